#pragma once

#include <array>
#include <string>
#include <string_view>

#include "hcdn/errors.hpp"
#include "hcdn/image.hpp"

namespace hcdn {

/// The five annotated causes of poor housekeeping.
enum class TypeTag { Debris, Rebars, SteelPipes, WaterPonding, Others };

enum class SceneTag { Indoor, Outdoor };

inline constexpr std::array<TypeTag, 5> kAllTypeTags = {
    TypeTag::Debris, TypeTag::Rebars, TypeTag::SteelPipes, TypeTag::WaterPonding,
    TypeTag::Others};

inline const char* type_tag_name(TypeTag t) {
  switch (t) {
    case TypeTag::Debris: return "Debris";
    case TypeTag::Rebars: return "Rebars";
    case TypeTag::SteelPipes: return "SteelPipes";
    case TypeTag::WaterPonding: return "WaterPonding";
    case TypeTag::Others: return "Others";
  }
  return "Others";
}

inline const char* scene_tag_name(SceneTag s) {
  return s == SceneTag::Indoor ? "Indoor" : "Outdoor";
}

inline TypeTag parse_type_tag(std::string_view s) {
  for (TypeTag t : kAllTypeTags)
    if (s == type_tag_name(t)) return t;
  raise(ErrorCode::ParseError, "unknown type_tag '" + std::string(s) + "'");
}

inline SceneTag parse_scene_tag(std::string_view s) {
  if (s == "Indoor") return SceneTag::Indoor;
  if (s == "Outdoor") return SceneTag::Outdoor;
  raise(ErrorCode::ParseError, "unknown scene_tag '" + std::string(s) + "'");
}

/// One bi-temporal record: the poor-housekeeping photo, the rectified
/// ("good") photo, and the change mask annotated in poor-image coordinates.
/// Before alignment the good image may have its own size;`is_prepared`
/// holds once the good image has been warped onto the poor frame.
struct HousekeepingPair {
  ImageBuffer poor;
  ImageBuffer good;
  BinaryMask mask;
  std::string pair_id;
  TypeTag type_tag = TypeTag::Others;
  SceneTag scene_tag = SceneTag::Outdoor;

  bool is_prepared() const {
    return poor.height == good.height && poor.width == good.width &&
           poor.height == mask.height && poor.width == mask.width;
  }

  void validate_prepared() const {
    if (!is_prepared())
      raise(ErrorCode::DimensionMismatch,
            "pair '" + pair_id + "' images and mask must share one shape");
    if (!mask.is_binary())
      raise(ErrorCode::NonBinaryTarget, "pair '" + pair_id + "' mask is not binary");
  }
};

}  // namespace hcdn
