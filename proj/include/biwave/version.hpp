#pragma once

#define BIWAVE_VERSION "0.1.0"
