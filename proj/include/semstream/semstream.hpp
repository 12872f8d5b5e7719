#pragma once

#include "semstream/channel.hpp"
#include "semstream/config.hpp"
#include "semstream/control.hpp"
#include "semstream/csv.hpp"
#include "semstream/enhancer_client.hpp"
#include "semstream/eps.hpp"
#include "semstream/error.hpp"
#include "semstream/frame.hpp"
#include "semstream/harness.hpp"
#include "semstream/metrics.hpp"
#include "semstream/netpbm.hpp"
#include "semstream/scaling.hpp"
#include "semstream/simulator.hpp"
#include "semstream/video.hpp"
