#include "paxoslease/multilease.hpp"
#include "paxoslease/state_codec.hpp"
#include "paxoslease/sim/naive.hpp"
#include "paxoslease/sim/safety.hpp"
#include "paxoslease/sim/simulator.hpp"
#include "paxoslease/wire/codec.hpp"
