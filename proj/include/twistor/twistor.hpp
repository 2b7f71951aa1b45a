#pragma once

#include "algebroid.hpp"
#include "distribution.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "leaf.hpp"
#include "linalg.hpp"
#include "pair_decomposition.hpp"
#include "rng.hpp"
#include "section_algebra.hpp"
#include "twistor_space.hpp"
