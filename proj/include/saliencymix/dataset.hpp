#pragma once

#include <string>
#include <vector>

#include "saliencymix/core_types.hpp"

namespace saliencymix {

struct DatasetItem {
  std::string id;
  Image image;
  std::size_t label_index = 0;
};

/// Ordered labelled images sharing one shape. Immutable once loaded.
struct Dataset {
  std::vector<DatasetItem> items;
  std::size_t class_count = 0;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }

  LabelVector label(std::size_t i) const { return LabelVector::one_hot(class_count, items[i].label_index); }

  /// Throws unless all images share W, H, C and labels are in range.
  void validate() const {
    for (const auto& item : items) {
      if (!item.image.same_shape(items.front().image)) {
        throw Error(ErrorKind::shape, "image '" + item.id + "' has a different shape than '" +
                                          items.front().id + "'");
      }
      if (item.label_index >= class_count) {
        throw Error(ErrorKind::shape, "label of '" + item.id + "' out of range");
      }
    }
  }
};

}  // namespace saliencymix
