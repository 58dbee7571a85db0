// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "surveykit/autoencoder.hpp"
#include "surveykit/dataset.hpp"
#include "surveykit/detectors.hpp"
#include "surveykit/entropy.hpp"
#include "surveykit/error.hpp"
#include "surveykit/kpca.hpp"
#include "surveykit/labeling.hpp"
#include "surveykit/parallel.hpp"
#include "surveykit/profiling.hpp"
#include "surveykit/reports.hpp"
#include "surveykit/rng.hpp"
#include "surveykit/sampling.hpp"
#include "surveykit/simulation.hpp"
