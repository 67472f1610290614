use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeKind {
    Class,
    Interface,
    Prim,
    Array,
}

#[derive(Clone, Debug)]
pub struct TypeInfo {
    pub kind: TypeKind,
    pub extends: Option<String>,
    pub implements: Vec<String>,
}

/// Declared types and their direct supertypes.
#[derive(Clone, Debug, Default)]
pub struct TypeHierarchy {
    types: BTreeMap<String, TypeInfo>,
}

pub const OBJECT: &str = "Object";

impl TypeHierarchy {
    pub fn new() -> Self {
        let mut h = TypeHierarchy::default();
        for p in super::PRIM_TYPES {
            h.types.insert(
                p.to_string(),
                TypeInfo {
                    kind: TypeKind::Prim,
                    extends: None,
                    implements: vec![],
                },
            );
        }
        h.types.insert(
            OBJECT.to_string(),
            TypeInfo {
                kind: TypeKind::Class,
                extends: None,
                implements: vec![],
            },
        );
        h
    }

    pub fn add(&mut self, name: &str, info: TypeInfo) -> Result<()> {
        if self.types.contains_key(name) && name != OBJECT {
            return Err(Error::semantic(format!("duplicate type {name}")));
        }
        self.types.insert(name.to_string(), info);
        Ok(())
    }

    /// Knows `T` and, for declared `T`, the array type `T[]`.
    pub fn contains(&self, name: &str) -> bool {
        match name.strip_suffix("[]") {
            Some(elem) => self.contains(elem),
            None => self.types.contains_key(name),
        }
    }

    pub fn kind(&self, name: &str) -> Option<TypeKind> {
        if name.ends_with("[]") {
            return self.contains(name).then_some(TypeKind::Array);
        }
        self.types.get(name).map(|t| t.kind)
    }

    pub fn info(&self, name: &str) -> Option<&TypeInfo> {
        self.types.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.types.keys()
    }

    fn parents(&self, name: &str) -> Vec<String> {
        if name.ends_with("[]") {
            return vec![OBJECT.to_string()];
        }
        match self.types.get(name) {
            Some(t) => {
                let mut v: Vec<String> = t.extends.iter().cloned().collect();
                v.extend(t.implements.iter().cloned());
                if t.kind == TypeKind::Class && t.extends.is_none() && name != OBJECT {
                    v.push(OBJECT.to_string());
                }
                v
            }
            None => vec![],
        }
    }

    /// `t = u` or `t ≺⁺ u`.
    pub fn subtype(&self, t: &str, u: &str) -> Result<bool> {
        for x in [t, u] {
            if !self.contains(x) {
                return Err(Error::semantic(format!("unknown type {x}")));
            }
        }
        if t == u {
            return Ok(true);
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![t.to_string()];
        while let Some(x) = stack.pop() {
            if !seen.insert(x.clone()) {
                continue;
            }
            for p in self.parents(&x) {
                if p == u {
                    return Ok(true);
                }
                stack.push(p);
            }
        }
        Ok(false)
    }

    /// Every declared supertype must exist, classes extend classes, and the
    /// relation is acyclic.
    pub fn validate(&self) -> Result<()> {
        for (name, t) in &self.types {
            if let Some(e) = &t.extends {
                match self.types.get(e) {
                    None => return Err(Error::semantic(format!("{name} extends unknown type {e}"))),
                    Some(p) if p.kind != t.kind => {
                        return Err(Error::semantic(format!("{name} cannot extend {e}")))
                    }
                    _ => {}
                }
            }
            for i in &t.implements {
                match self.types.get(i) {
                    Some(p) if p.kind == TypeKind::Interface => {}
                    _ => return Err(Error::semantic(format!("{name} implements non-interface {i}"))),
                }
            }
        }
        // cycle check: a type may not reach itself through parents
        for name in self.types.keys() {
            let mut seen = BTreeSet::new();
            let mut stack = self.parents(name);
            while let Some(x) = stack.pop() {
                if x == *name {
                    return Err(Error::semantic(format!("cyclic inheritance through {name}")));
                }
                if seen.insert(x.clone()) {
                    stack.extend(self.parents(&x));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TypeHierarchy {
        let mut h = TypeHierarchy::new();
        h.add("I", TypeInfo { kind: TypeKind::Interface, extends: None, implements: vec![] }).unwrap();
        h.add("B", TypeInfo { kind: TypeKind::Class, extends: None, implements: vec!["I".into()] }).unwrap();
        h.add("C", TypeInfo { kind: TypeKind::Class, extends: Some("B".into()), implements: vec![] }).unwrap();
        h.add("D", TypeInfo { kind: TypeKind::Class, extends: None, implements: vec![] }).unwrap();
        h
    }

    #[test]
    fn reflexive() {
        assert!(sample().subtype("C", "C").unwrap());
    }

    #[test]
    fn transitive_through_interface() {
        assert!(sample().subtype("C", "I").unwrap());
        assert!(!sample().subtype("I", "C").unwrap());
    }

    #[test]
    fn unrelated() {
        assert!(!sample().subtype("C", "D").unwrap());
        assert!(sample().subtype("int", "Object").is_ok_and(|b| !b));
    }

    #[test]
    fn unknown_type_is_error() {
        assert!(sample().subtype("C", "Nope").is_err());
    }

    #[test]
    fn cycle_rejected() {
        let mut h = TypeHierarchy::new();
        h.add("A", TypeInfo { kind: TypeKind::Class, extends: Some("B".into()), implements: vec![] }).unwrap();
        h.add("B", TypeInfo { kind: TypeKind::Class, extends: Some("A".into()), implements: vec![] }).unwrap();
        assert!(h.validate().is_err());
        assert!(sample().validate().is_ok());
    }
}
