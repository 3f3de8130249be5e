#pragma once

#include "ciasr/errors.hpp"
#include "ciasr/special_fn.hpp"
#include "ciasr/model.hpp"
#include "ciasr/rng.hpp"
#include "ciasr/samples.hpp"
#include "ciasr/stable_sampler.hpp"
#include "ciasr/estimator.hpp"
#include "ciasr/baselines_metrics.hpp"
#include "ciasr/parallel.hpp"
#include "ciasr/pipeline.hpp"
