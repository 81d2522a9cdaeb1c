#pragma once

#include "mcmot/community.hpp"
#include "mcmot/core.hpp"
#include "mcmot/graph.hpp"
#include "mcmot/hungarian.hpp"
#include "mcmot/io.hpp"
#include "mcmot/kalman.hpp"
#include "mcmot/metrics.hpp"
#include "mcmot/pipeline.hpp"
#include "mcmot/synth.hpp"
#include "mcmot/tracker.hpp"
