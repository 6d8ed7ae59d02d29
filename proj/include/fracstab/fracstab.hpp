#pragma once

// Umbrella header for the whole library.

#include "fracstab/errors.hpp"
#include "fracstab/params.hpp"
#include "fracstab/quadrature.hpp"
#include "fracstab/radial.hpp"
#include "fracstab/angular.hpp"
#include "fracstab/fractional_laplacian.hpp"
#include "fracstab/extension.hpp"
#include "fracstab/flux_identity.hpp"
#include "fracstab/regimes.hpp"
#include "fracstab/gelfand.hpp"
#include "fracstab/stability.hpp"
#include "fracstab/io.hpp"
#include "fracstab/acceptance.hpp"
