#pragma once

// Single include point for cpp-httplib so the TLS macro is defined
// consistently in every translation unit that uses it.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
