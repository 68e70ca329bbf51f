#pragma once

#include "nnreach/activation_pattern.hpp"
#include "nnreach/encoding.hpp"
#include "nnreach/errors.hpp"
#include "nnreach/geometry.hpp"
#include "nnreach/lp.hpp"
#include "nnreach/network.hpp"
#include "nnreach/network_io.hpp"
#include "nnreach/projection.hpp"
#include "nnreach/reach.hpp"
#include "nnreach/rpm.hpp"
#include "nnreach/tolerances.hpp"
