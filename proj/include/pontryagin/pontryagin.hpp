#ifndef PONTRYAGIN_PONTRYAGIN_HPP
#define PONTRYAGIN_PONTRYAGIN_HPP

#include "pontryagin/linalg.hpp"
#include "pontryagin/indefinite.hpp"
#include "pontryagin/colligation.hpp"
#include "pontryagin/julia.hpp"
#include "pontryagin/cascade.hpp"
#include "pontryagin/blaschke.hpp"
#include "pontryagin/similarity.hpp"
#include "pontryagin/kernel.hpp"
#include "pontryagin/fundamental.hpp"
#include "pontryagin/schur.hpp"

#endif  // PONTRYAGIN_PONTRYAGIN_HPP
