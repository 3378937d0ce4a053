#pragma once

#include "uol/blowup.hpp"
#include "uol/boundary.hpp"
#include "uol/core.hpp"
#include "uol/cross.hpp"
#include "uol/extremal.hpp"
#include "uol/field_io.hpp"
#include "uol/free_boundary.hpp"
#include "uol/grid.hpp"
#include "uol/integrals.hpp"
#include "uol/poisson.hpp"
#include "uol/pulse.hpp"
#include "uol/quadrature.hpp"
#include "uol/sampler.hpp"
#include "uol/variational.hpp"
#include "uol/weiss.hpp"
