#pragma once

// Umbrella header: influence-guided experience replay for incrementally
// trained neural recommendation models.

#include "driftreplay/arch.hpp"
#include "driftreplay/blocks.hpp"
#include "driftreplay/config.hpp"
#include "driftreplay/correlation.hpp"
#include "driftreplay/influence.hpp"
#include "driftreplay/loaders.hpp"
#include "driftreplay/loss.hpp"
#include "driftreplay/metrics.hpp"
#include "driftreplay/optim.hpp"
#include "driftreplay/param_set.hpp"
#include "driftreplay/protocol.hpp"
#include "driftreplay/rec_model.hpp"
#include "driftreplay/record.hpp"
#include "driftreplay/report.hpp"
#include "driftreplay/reservoir.hpp"
#include "driftreplay/sparse_grad.hpp"
#include "driftreplay/stats.hpp"
#include "driftreplay/strategies.hpp"
#include "driftreplay/synth.hpp"
#include "driftreplay/train.hpp"
