// SPDX-License-Identifier: MIT
#pragma once

#include "tfsisr/degradation.hpp"
#include "tfsisr/error.hpp"
#include "tfsisr/experiments.hpp"
#include "tfsisr/mask.hpp"
#include "tfsisr/metrics.hpp"
#include "tfsisr/phantom.hpp"
#include "tfsisr/psf.hpp"
#include "tfsisr/random.hpp"
#include "tfsisr/report_io.hpp"
#include "tfsisr/resample.hpp"
#include "tfsisr/solver.hpp"
#include "tfsisr/tensor_algebra.hpp"
#include "tfsisr/volume.hpp"
#include "tfsisr/volume_io.hpp"
