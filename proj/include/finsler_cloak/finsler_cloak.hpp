#pragma once

#include "finsler_cloak/errors.hpp"
#include "finsler_cloak/linalg.hpp"
#include "finsler_cloak/metric_field.hpp"
#include "finsler_cloak/cloak_design.hpp"
#include "finsler_cloak/medium.hpp"
#include "finsler_cloak/geodesic.hpp"
#include "finsler_cloak/scenarios.hpp"
#include "finsler_cloak/validation.hpp"
#include "finsler_cloak/config.hpp"
#include "finsler_cloak/io.hpp"
#include "finsler_cloak/cli.hpp"
