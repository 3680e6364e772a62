#pragma once

// Umbrella header for the whole toolkit.

#include "vtg/config.hpp"
#include "vtg/dynamics.hpp"
#include "vtg/energy.hpp"
#include "vtg/errors.hpp"
#include "vtg/gcode.hpp"
#include "vtg/generator.hpp"
#include "vtg/metrics.hpp"
#include "vtg/nurbs.hpp"
#include "vtg/pipeline.hpp"
#include "vtg/psd.hpp"
#include "vtg/report_io.hpp"
#include "vtg/scenes.hpp"
#include "vtg/surface.hpp"
#include "vtg/toolpath_json.hpp"
#include "vtg/types.hpp"
