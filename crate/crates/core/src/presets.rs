//! Built-in hand and shape configurations.

use crate::error::{Error, Result};
use crate::hand::HandModel;
use crate::sdf::Shape;

pub const HANDS: &[(&str, &str)] = &[
    ("tripod", include_str!("../assets/hands/tripod.json")),
    ("quad", include_str!("../assets/hands/quad.json")),
    ("gripper3", include_str!("../assets/hands/gripper3.json")),
];

pub const SHAPES: &[(&str, &str)] = &[
    ("sphere", include_str!("../assets/shapes/sphere.json")),
    ("box", include_str!("../assets/shapes/box.json")),
    ("capsule", include_str!("../assets/shapes/capsule.json")),
    ("bottle", include_str!("../assets/shapes/bottle.json")),
];

fn lookup<'a>(table: &[(&str, &'a str)], name: &str) -> Result<&'a str> {
    table
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::InvalidConfig(format!("no built-in config named {name:?}")))
}

pub fn hand_json(name: &str) -> Result<&'static str> {
    lookup(HANDS, name)
}

pub fn shape_json(name: &str) -> Result<&'static str> {
    lookup(SHAPES, name)
}

pub fn hand(name: &str) -> Result<HandModel> {
    HandModel::from_json(hand_json(name)?)
}

pub fn shape(name: &str) -> Result<Shape> {
    Shape::from_json(shape_json(name)?)
}
