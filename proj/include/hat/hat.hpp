#pragma once

// Everything except the network server (hat/server.hpp pulls in Boost).

#include "hat/assist.hpp"
#include "hat/config.hpp"
#include "hat/hat_mapping.hpp"
#include "hat/json_io.hpp"
#include "hat/kinematics.hpp"
#include "hat/modes.hpp"
#include "hat/pipeline.hpp"
#include "hat/protocol.hpp"
#include "hat/session.hpp"
#include "hat/sim.hpp"
#include "hat/world_object.hpp"
