#pragma once

#include "edgefair/assignment.hpp"
#include "edgefair/csv.hpp"
#include "edgefair/decomposition.hpp"
#include "edgefair/errors.hpp"
#include "edgefair/experiments.hpp"
#include "edgefair/inference.hpp"
#include "edgefair/metrics.hpp"
#include "edgefair/mlp.hpp"
#include "edgefair/model.hpp"
#include "edgefair/model_io.hpp"
#include "edgefair/parallel.hpp"
#include "edgefair/procedures.hpp"
#include "edgefair/simplex.hpp"
#include "edgefair/svg.hpp"
#include "edgefair/synthesis.hpp"
