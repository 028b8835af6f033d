#pragma once

// Umbrella header.

#include "saliencymix/core_types.hpp"
#include "saliencymix/integral_image.hpp"
#include "saliencymix/dft.hpp"
#include "saliencymix/saliency.hpp"
#include "saliencymix/mixer.hpp"
#include "saliencymix/dataset.hpp"
#include "saliencymix/batch.hpp"
#include "saliencymix/dataset_io.hpp"
