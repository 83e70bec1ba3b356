#pragma once

// Confidence intervals for disease prevalence from surveys: simple random
// samples with imperfect assays, weighted samples with perfect assays, and
// weighted samples with imperfect assays, plus a seeded simulation harness
// for coverage studies.

#include "prevci/confidence_distributions.hpp"
#include "prevci/distributions.hpp"
#include "prevci/errors.hpp"
#include "prevci/estimators.hpp"
#include "prevci/intervals.hpp"
#include "prevci/io.hpp"
#include "prevci/rng.hpp"
#include "prevci/simulation.hpp"
#include "prevci/special_functions.hpp"
#include "prevci/survey.hpp"
