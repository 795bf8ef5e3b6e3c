#pragma once

#include <abcsmc/diagnostics.hpp>
#include <abcsmc/engine.hpp>
#include <abcsmc/errors.hpp>
#include <abcsmc/io.hpp>
#include <abcsmc/kernels.hpp>
#include <abcsmc/model.hpp>
#include <abcsmc/models/mg1_queue.hpp>
#include <abcsmc/models/normal_mixture.hpp>
#include <abcsmc/models/toggle_switch.hpp>
#include <abcsmc/particle.hpp>
#include <abcsmc/quantile.hpp>
#include <abcsmc/random.hpp>
