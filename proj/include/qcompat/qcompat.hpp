#ifndef QCOMPAT_QCOMPAT_HPP
#define QCOMPAT_QCOMPAT_HPP

#include "qcompat/numkit.hpp"
#include "qcompat/devices.hpp"
#include "qcompat/regions.hpp"
#include "qcompat/constructions.hpp"
#include "qcompat/covariance.hpp"
#include "qcompat/feasibility.hpp"

#endif  // QCOMPAT_QCOMPAT_HPP
