/**
 * @file kolmo.hpp
 * @brief Umbrella header for the numerical library (no JSON dependency).
 */
#pragma once

#include "kolmo/csv.hpp"
#include "kolmo/drift.hpp"
#include "kolmo/error.hpp"
#include "kolmo/field.hpp"
#include "kolmo/gramian.hpp"
#include "kolmo/holder.hpp"
#include "kolmo/linalg.hpp"
#include "kolmo/operator.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/quadrature.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/semigroup.hpp"
#include "kolmo/simulate.hpp"
#include "kolmo/verify.hpp"
