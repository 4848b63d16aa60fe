#pragma once

#include "config.hpp"
#include "core.hpp"
#include "device.hpp"
#include "errors.hpp"
#include "figures.hpp"
#include "io.hpp"
#include "noise.hpp"
#include "protocols.hpp"
#include "quadrature.hpp"
#include "sde.hpp"
