#pragma once

#define SVYLASSO_VERSION "0.1.0"
