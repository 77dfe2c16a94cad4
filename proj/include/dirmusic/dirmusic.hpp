#pragma once

#include "dirmusic/errors.hpp"
#include "dirmusic/pattern.hpp"
#include "dirmusic/manifold.hpp"
#include "dirmusic/signal.hpp"
#include "dirmusic/estimator.hpp"
#include "dirmusic/experiments.hpp"
#include "dirmusic/pipeline.hpp"
#include "dirmusic/io.hpp"
#include "dirmusic/config.hpp"
