#include "crosswatch/detection.hpp"

namespace crosswatch {

const char* to_string(ObjectClass c) {
    switch (c) {
        case ObjectClass::Motorcycle: return "motorcycle";
        case ObjectClass::Car: return "car";
        case ObjectClass::Bus: return "bus";
        case ObjectClass::Truck: return "truck";
        case ObjectClass::NearAccident: return "near_accident";
    }
    return "car";
}

std::optional<ObjectClass> object_class_from_string(const std::string& s) {
    if (s == "motorcycle") return ObjectClass::Motorcycle;
    if (s == "car") return ObjectClass::Car;
    if (s == "bus") return ObjectClass::Bus;
    if (s == "truck") return ObjectClass::Truck;
    if (s == "near_accident") return ObjectClass::NearAccident;
    return std::nullopt;
}

} // namespace crosswatch
