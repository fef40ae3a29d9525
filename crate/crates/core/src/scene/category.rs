use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Closed object vocabulary: the reconstruction layer's macro categories plus
/// the small items picked up by the image detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Bathtub,
    Door,
    Opening,
    Wall,
    Window,
    Bed,
    Chair,
    Sink,
    Sofa,
    Stairs,
    Storage,
    Table,
    Television,
    Toilet,
    DoorHandle,
    ElectricSocket,
    GrabBar,
    Knife,
    Medication,
    Rug,
    Scissors,
    SmokeAlarm,
    LightSwitch,
}

impl Category {
    pub const ALL: [Category; 23] = [
        Category::Bathtub,
        Category::Door,
        Category::Opening,
        Category::Wall,
        Category::Window,
        Category::Bed,
        Category::Chair,
        Category::Sink,
        Category::Sofa,
        Category::Stairs,
        Category::Storage,
        Category::Table,
        Category::Television,
        Category::Toilet,
        Category::DoorHandle,
        Category::ElectricSocket,
        Category::GrabBar,
        Category::Knife,
        Category::Medication,
        Category::Rug,
        Category::Scissors,
        Category::SmokeAlarm,
        Category::LightSwitch,
    ];

    pub const MICRO: [Category; 9] = [
        Category::DoorHandle,
        Category::ElectricSocket,
        Category::GrabBar,
        Category::Knife,
        Category::Medication,
        Category::Rug,
        Category::Scissors,
        Category::SmokeAlarm,
        Category::LightSwitch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Bathtub => "bathtub",
            Category::Door => "door",
            Category::Opening => "opening",
            Category::Wall => "wall",
            Category::Window => "window",
            Category::Bed => "bed",
            Category::Chair => "chair",
            Category::Sink => "sink",
            Category::Sofa => "sofa",
            Category::Stairs => "stairs",
            Category::Storage => "storage",
            Category::Table => "table",
            Category::Television => "television",
            Category::Toilet => "toilet",
            Category::DoorHandle => "door_handle",
            Category::ElectricSocket => "electric_socket",
            Category::GrabBar => "grab_bar",
            Category::Knife => "knife",
            Category::Medication => "medication",
            Category::Rug => "rug",
            Category::Scissors => "scissors",
            Category::SmokeAlarm => "smoke_alarm",
            Category::LightSwitch => "light_switch",
        }
    }

    /// Small items found by the image detector rather than the room reconstruction.
    pub fn is_micro(self) -> bool {
        Self::MICRO.contains(&self)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category `{0}`")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}
