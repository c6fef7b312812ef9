#pragma once

// Umbrella header for the core library (everything except the HTTP service).

#include "builtin_rules.hpp"
#include "calibrate.hpp"
#include "cube.hpp"
#include "envi.hpp"
#include "error.hpp"
#include "label_map.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "plot.hpp"
#include "preprocess.hpp"
#include "rule_authoring.hpp"
#include "rule_engine.hpp"
#include "rules.hpp"
#include "shape_features.hpp"
#include "synthetic.hpp"
