#pragma once

#include "fable/baselines.hpp"
#include "fable/dataset.hpp"
#include "fable/ebcc.hpp"
#include "fable/error.hpp"
#include "fable/experiments.hpp"
#include "fable/fable_model.hpp"
#include "fable/linalg/kernel.hpp"
#include "fable/linalg/lanczos.hpp"
#include "fable/linalg/lowrank_posterior.hpp"
#include "fable/linalg/special.hpp"
#include "fable/metrics.hpp"
#include "fable/mixture.hpp"
#include "fable/posterior.hpp"
#include "fable/synthetic.hpp"
