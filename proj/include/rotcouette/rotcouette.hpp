#pragma once

#include "cli.hpp"
#include "config.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "linear_solutions.hpp"
#include "multipliers.hpp"
#include "nonlinear_sim.hpp"
#include "quadrature.hpp"
#include "regression.hpp"
#include "snapshot_io.hpp"
#include "spectral_core.hpp"
#include "threshold_harness.hpp"
#include "velocity_field.hpp"
#include "version.hpp"
