#pragma once

#include "etrs/generate.hpp"
#include "etrs/geometry.hpp"
#include "etrs/io.hpp"
#include "etrs/lp.hpp"
#include "etrs/model.hpp"
#include "etrs/oracle.hpp"
#include "etrs/reduction.hpp"
#include "etrs/sdpcheck.hpp"
#include "etrs/trs0.hpp"
#include "etrs/types.hpp"
