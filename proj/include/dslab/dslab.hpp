#pragma once

#include "agnostic.hpp"
#include "algebra.hpp"
#include "combinatorics.hpp"
#include "dims.hpp"
#include "error.hpp"
#include "exact_rank.hpp"
#include "flow.hpp"
#include "hclass.hpp"
#include "learn.hpp"
#include "oig.hpp"
#include "parallel.hpp"
#include "rational.hpp"
