#pragma once

#define ROTCOUETTE_VERSION "0.1.0"
