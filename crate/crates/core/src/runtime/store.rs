use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsl::{PropertyDecl, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub value: Value,
    /// Tick of the last write; initial values count as written at tick 0.
    pub last_write_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error("property `{property}` holds a {expected}, cannot assign {found}")]
    TypeMismatch { property: String, expected: &'static str, found: String },
}

/// One agent's property values. The type of each property is fixed by its
/// initial value; `version` counts every write.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyStore {
    slots: BTreeMap<String, Slot>,
    version: u64,
}

impl PropertyStore {
    pub fn from_decls(decls: &[PropertyDecl]) -> PropertyStore {
        let slots = decls
            .iter()
            .map(|d| (d.name.clone(), Slot { value: d.initial.clone(), last_write_tick: 0 }))
            .collect();
        PropertyStore { slots, version: 0 }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.slots.get(name).map(|s| &s.value)
    }

    pub fn slot(&self, name: &str) -> Option<&Slot> {
        self.slots.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.slots.contains_key(name)
    }

    pub fn check(&self, name: &str, value: &Value) -> Result<(), StoreError> {
        let slot = self.slots.get(name).ok_or_else(|| StoreError::UnknownProperty(name.to_string()))?;
        if slot.value.same_type(value) {
            Ok(())
        } else {
            Err(StoreError::TypeMismatch {
                property: name.to_string(),
                expected: slot.value.type_name(),
                found: value.to_string(),
            })
        }
    }

    /// Write `value` and return the previous one.
    pub fn write(&mut self, name: &str, value: Value, tick: u64) -> Result<Value, StoreError> {
        self.check(name, &value)?;
        let slot = self.slots.get_mut(name).expect("checked");
        let old = std::mem::replace(&mut slot.value, value);
        slot.last_write_tick = tick;
        self.version += 1;
        Ok(old)
    }

    pub fn values(&self) -> BTreeMap<String, Value> {
        self.slots.iter().map(|(k, s)| (k.clone(), s.value.clone())).collect()
    }
}
