#pragma once

#include "sfpsg/action_space.hpp"
#include "sfpsg/engine.hpp"
#include "sfpsg/errors.hpp"
#include "sfpsg/game.hpp"
#include "sfpsg/generator.hpp"
#include "sfpsg/io.hpp"
#include "sfpsg/oracle.hpp"
#include "sfpsg/response.hpp"
#include "sfpsg/rng.hpp"
#include "sfpsg/schedule.hpp"
