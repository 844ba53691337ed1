#pragma once

#define CONETREE_VERSION "0.1.0"
