use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GraphError;

/// A `#RRGGBB` display color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Color(pub [u8; 3]);

pub const DEFAULT_COLOR: Color = Color([0x44, 0x44, 0x44]);

/// Assigned in depth-first order to root types without an explicit color.
pub const PALETTE: [Color; 8] = [
    Color([0x1F, 0x77, 0xB4]),
    Color([0xFF, 0x7F, 0x0E]),
    Color([0x2C, 0xA0, 0x2C]),
    Color([0xD6, 0x27, 0x28]),
    Color([0x94, 0x67, 0xBD]),
    Color([0x8C, 0x56, 0x4B]),
    Color([0xE3, 0x77, 0xC2]),
    Color([0x17, 0xBE, 0xCF]),
];

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for Color {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s
            .strip_prefix('#')
            .filter(|h| h.len() == 6 && h.chars().all(|c| c.is_ascii_hexdigit()))
            .ok_or_else(|| format!("`{s}` is not a #RRGGBB color"))?;
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).expect("checked hex digits");
        Ok(Color([byte(0), byte(2), byte(4)]))
    }
}

impl Serialize for Color {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Color {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeEntry {
    pub name: String,
    pub color: Color,
    #[serde(default)]
    pub children: Vec<TypeEntry>,
}

impl TypeEntry {
    pub fn leaf(name: impl Into<String>, color: Color) -> Self {
        TypeEntry { name: name.into(), color, children: Vec::new() }
    }

    fn visit<'a>(&'a self, path: &mut Vec<&'a str>, f: &mut impl FnMut(&'a TypeEntry, &[&'a str])) {
        f(self, path);
        path.push(&self.name);
        for child in &self.children {
            child.visit(path, f);
        }
        path.pop();
    }

    fn set_color(&mut self, color: Color, cascade: bool) {
        self.color = color;
        if cascade {
            for child in &mut self.children {
                child.set_color(color, true);
            }
        }
    }

    fn find_mut(&mut self, name: &str) -> Option<&mut TypeEntry> {
        if self.name == name {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(name))
    }
}

/// A tree of annotation types with display colors. Names are unique across
/// the whole tree and matched case-sensitively.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Taxonomy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub roots: Vec<TypeEntry>,
}

impl Taxonomy {
    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Depth-first walk; the callback receives each entry and its ancestors
    /// (root first).
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&'a TypeEntry, &[&'a str])) {
        let mut path = Vec::new();
        for root in &self.roots {
            root.visit(&mut path, &mut f);
        }
    }

    pub fn find(&self, name: &str) -> Option<&TypeEntry> {
        let mut found = None;
        self.walk(|e, _| {
            if found.is_none() && e.name == name {
                found = Some(e);
            }
        });
        found
    }

    pub fn contains(&self, name: &str) -> bool {
        self.find(name).is_some()
    }

    /// Ancestors of `name`, nearest first. `None` when the type is unknown.
    pub fn ancestors(&self, name: &str) -> Option<Vec<String>> {
        let mut found = None;
        self.walk(|e, path| {
            if found.is_none() && e.name == name {
                found = Some(path.iter().rev().map(|s| s.to_string()).collect());
            }
        });
        found
    }

    pub fn color_of(&self, name: &str) -> Option<Color> {
        self.find(name).map(|e| e.color)
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.walk(|e, _| names.push(e.name.clone()));
        names
    }
}

/// Returns a new taxonomy with `type_name` recolored, and all of its
/// descendants too when `cascade` is set.
pub fn recolor_type(tax: &Taxonomy, type_name: &str, color: Color, cascade: bool) -> Result<Taxonomy, GraphError> {
    let mut next = tax.clone();
    let entry = next
        .roots
        .iter_mut()
        .find_map(|r| r.find_mut(type_name))
        .ok_or_else(|| GraphError::UnknownType(type_name.to_string()))?;
    entry.set_color(color, cascade);
    Ok(next)
}
