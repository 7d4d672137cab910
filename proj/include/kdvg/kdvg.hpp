#pragma once

/// Numerical core. The experiment runner (experiments.hpp) also needs
/// OpenSSL and is included separately.
#include "kdvg/almost_conservation.hpp"
#include "kdvg/bilinear.hpp"
#include "kdvg/cutoff.hpp"
#include "kdvg/dyadic.hpp"
#include "kdvg/error.hpp"
#include "kdvg/fft.hpp"
#include "kdvg/gevrey.hpp"
#include "kdvg/initial_data.hpp"
#include "kdvg/power_law.hpp"
#include "kdvg/scheduler.hpp"
#include "kdvg/solver.hpp"
#include "kdvg/spacetime.hpp"
#include "kdvg/spectral_core.hpp"
