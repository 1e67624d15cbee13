#pragma once

#include "hrf/errors.hpp"
#include "hrf/grid_field.hpp"
#include "hrf/geometry.hpp"
#include "hrf/schedule.hpp"
#include "hrf/flow.hpp"
#include "hrf/field_series.hpp"
#include "hrf/heat.hpp"
#include "hrf/moser.hpp"
#include "hrf/random.hpp"
#include "hrf/tridiagonal.hpp"
#include "hrf/spectral.hpp"
#include "hrf/entropy.hpp"
#include "hrf/harness/config.hpp"
#include "hrf/harness/checkpoint.hpp"
#include "hrf/harness/output.hpp"
#include "hrf/harness/run.hpp"
