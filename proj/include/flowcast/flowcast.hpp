#pragma once

// Umbrella header: the whole forecasting pipeline.

#include "flowcast/common.hpp"
#include "flowcast/config.hpp"
#include "flowcast/dataset.hpp"
#include "flowcast/evalkit.hpp"
#include "flowcast/importance.hpp"
#include "flowcast/lstm.hpp"
#include "flowcast/matrix.hpp"
#include "flowcast/model_io.hpp"
#include "flowcast/period.hpp"
#include "flowcast/rng.hpp"
#include "flowcast/synth.hpp"
#include "flowcast/tuner.hpp"
#include "flowcast/windowing.hpp"
