#pragma once

// Umbrella header.

#include "ssmr/errors.hpp"
#include "ssmr/polyalg.hpp"
#include "ssmr/model.hpp"
#include "ssmr/system_io.hpp"
#include "ssmr/beam.hpp"
#include "ssmr/ssm_auto.hpp"
#include "ssmr/ssm_forced.hpp"
#include "ssmr/reduced.hpp"
#include "ssmr/frc.hpp"
#include "ssmr/isola.hpp"
#include "ssmr/oracle.hpp"
#include "ssmr/report.hpp"
