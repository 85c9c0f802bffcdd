#pragma once

#include "support.hpp"

#include <doctest.h>
