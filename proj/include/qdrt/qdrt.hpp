#pragma once

#include <qdrt/channel.hpp>
#include <qdrt/error.hpp>
#include <qdrt/evaluate.hpp>
#include <qdrt/geometry.hpp>
#include <qdrt/material.hpp>
#include <qdrt/mesh_io.hpp>
#include <qdrt/metrics.hpp>
#include <qdrt/parallel.hpp>
#include <qdrt/qd.hpp>
#include <qdrt/qd_stats.hpp>
#include <qdrt/raytracer.hpp>
#include <qdrt/rng.hpp>
#include <qdrt/scenario.hpp>
#include <qdrt/scenes.hpp>
#include <qdrt/simplify.hpp>
#include <qdrt/trace_io.hpp>
