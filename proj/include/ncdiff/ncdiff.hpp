#pragma once

#include "builtins.hpp"
#include "calculus.hpp"
#include "calculus_file.hpp"
#include "complex.hpp"
#include "diffop.hpp"
#include "library.hpp"
#include "verify.hpp"
