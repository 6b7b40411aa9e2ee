#pragma once

#include "arith.hpp"
#include "buchstab.hpp"
#include "euler_product.hpp"
#include "instances.hpp"
#include "interval_sieve.hpp"
#include "selberg.hpp"
