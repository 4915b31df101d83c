#pragma once

// Recording
#include "dpkit/core_array.hpp"
#include "dpkit/errors.hpp"

// Frames, traces and their JSON form
#include "dpkit/trace.hpp"
#include "dpkit/trace_json.hpp"

// Self-test
#include "dpkit/quiz.hpp"

// Reference problems and oracles
#include "dpkit/corpus.hpp"

// Serving and export
#include "dpkit/html_export.hpp"
#include "dpkit/server.hpp"
