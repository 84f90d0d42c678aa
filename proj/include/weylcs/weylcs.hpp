#pragma once

#include "weylcs/common.hpp"
#include "weylcs/window.hpp"
#include "weylcs/domain.hpp"
#include "weylcs/operators.hpp"
#include "weylcs/eigen.hpp"
#include "weylcs/frame.hpp"
#include "weylcs/weyl.hpp"
