#pragma once

// Umbrella header.

#include "subseg/error.hpp"
#include "subseg/linalg.hpp"
#include "subseg/solvers.hpp"
#include "subseg/clustering.hpp"
#include "subseg/synthgen.hpp"
#include "subseg/pipeline.hpp"
#include "subseg/io.hpp"
