#pragma once

#include "paxoslease/acceptor.hpp"
#include "paxoslease/backoff.hpp"
#include "paxoslease/ballot.hpp"
#include "paxoslease/effect.hpp"
#include "paxoslease/message.hpp"
#include "paxoslease/multilease.hpp"
#include "paxoslease/proposer.hpp"
#include "paxoslease/sim/builtins.hpp"
#include "paxoslease/sim/model_check.hpp"
#include "paxoslease/sim/naive.hpp"
#include "paxoslease/sim/safety.hpp"
#include "paxoslease/sim/scenario.hpp"
#include "paxoslease/sim/simulator.hpp"
#include "paxoslease/state_codec.hpp"
#include "paxoslease/time.hpp"
#include "paxoslease/wire/codec.hpp"
#include "paxoslease/wire/fuzz.hpp"
#include "paxoslease/wire/udp_node.hpp"
