#pragma once

// Umbrella header.

#include "setmember/error.hpp"
#include "setmember/vector.hpp"
#include "setmember/geometry.hpp"
#include "setmember/network.hpp"
#include "setmember/regression.hpp"
#include "setmember/reference.hpp"
#include "setmember/estimation.hpp"
#include "setmember/harness.hpp"
