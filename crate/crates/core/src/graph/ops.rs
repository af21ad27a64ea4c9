use std::collections::{BTreeMap, BTreeSet};

use super::{AnchorRef, Document, GraphError, Mention, Relation};

impl Document {
    /// Returns a new version with `mention` added.
    pub fn add_mention(&self, mention: Mention) -> Result<Document, GraphError> {
        if self.contains_id(&mention.id) {
            return Err(GraphError::DuplicateId(mention.id));
        }
        self.check_anchors(&mention)?;
        let mut next = self.clone();
        next.mentions.insert(mention.id.clone(), mention);
        Ok(next)
    }

    /// Returns a new version with `rel` added. Rejects dangling endpoints and
    /// any edge that would close a cycle in the relation-reference graph.
    pub fn add_relation(&self, rel: Relation) -> Result<Document, GraphError> {
        if self.contains_id(&rel.id) {
            return Err(GraphError::DuplicateId(rel.id));
        }
        self.install_relation(rel)
    }

    /// Returns a new version where the relation with `rel.id` is replaced.
    pub fn replace_relation(&self, rel: Relation) -> Result<Document, GraphError> {
        if !self.relations.contains_key(&rel.id) {
            return Err(GraphError::UnknownId(rel.id));
        }
        self.install_relation(rel)
    }

    fn install_relation(&self, rel: Relation) -> Result<Document, GraphError> {
        check_shape(&rel)?;
        if rel.referenced_relations().any(|r| r == rel.id) {
            return Err(GraphError::CycleDetected(rel.id));
        }
        for endpoint in rel.endpoints() {
            if !self.resolves(endpoint) {
                return Err(GraphError::DanglingReference { owner: rel.id.clone(), target: endpoint.to_string() });
            }
        }
        if self.relations.contains_key(&rel.id) {
            // Existing relation: the new edges may reach back to it.
            if rel.referenced_relations().any(|start| self.reaches(start, &rel.id)) {
                return Err(GraphError::CycleDetected(rel.id));
            }
        }
        let mut next = self.clone();
        next.relations.insert(rel.id.clone(), rel);
        Ok(next)
    }

    /// True when `target` is reachable from relation `from` by following
    /// relation references (a relation reaches itself).
    pub fn reaches(&self, from: &str, target: &str) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(id) = stack.pop() {
            if id == target {
                return true;
            }
            if !seen.insert(id) {
                continue;
            }
            if let Some(rel) = self.relations.get(id) {
                stack.extend(rel.referenced_relations());
            }
        }
        false
    }

    /// Removes `id` and, transitively, every relation that loses an endpoint.
    /// Returns the new version and the set of all removed ids.
    pub fn delete_element(&self, id: &str) -> Result<(Document, BTreeSet<String>), GraphError> {
        if !self.contains_id(id) {
            return Err(GraphError::UnknownId(id.to_string()));
        }
        let mut dependents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for rel in self.relations.values() {
            for endpoint in rel.endpoints() {
                if let Some(target) = endpoint.element_id() {
                    dependents.entry(target).or_default().push(&rel.id);
                }
            }
        }
        let mut removed: BTreeSet<String> = BTreeSet::new();
        let mut queue = vec![id];
        while let Some(current) = queue.pop() {
            if !removed.insert(current.to_string()) {
                continue;
            }
            if let Some(deps) = dependents.get(current) {
                queue.extend(deps.iter().copied());
            }
        }
        let mut next = self.clone();
        for gone in &removed {
            next.mentions.remove(gone);
            next.relations.remove(gone);
        }
        Ok((next, removed))
    }

    pub fn relabel(&self, id: &str, label: &str) -> Result<Document, GraphError> {
        let mut next = self.clone();
        if let Some(m) = next.mentions.get_mut(id) {
            m.label = label.to_string();
        } else if let Some(r) = next.relations.get_mut(id) {
            r.label = label.to_string();
        } else {
            return Err(GraphError::UnknownId(id.to_string()));
        }
        Ok(next)
    }

    pub fn retype(&self, id: &str, type_name: Option<&str>) -> Result<Document, GraphError> {
        let mut next = self.clone();
        let slot = if let Some(m) = next.mentions.get_mut(id) {
            &mut m.type_name
        } else if let Some(r) = next.relations.get_mut(id) {
            &mut r.type_name
        } else {
            return Err(GraphError::UnknownId(id.to_string()));
        };
        *slot = type_name.map(str::to_string);
        Ok(next)
    }

    /// Adds the annotations of `other` (which must share this text) under
    /// fresh ids where they collide.
    pub fn overlay(&self, other: &Document) -> Result<Document, GraphError> {
        if self.text.trim_end() != other.text.trim_end() {
            return Err(GraphError::InvalidAnchor {
                id: other.id.clone(),
                reason: "overlaid document has different text".into(),
            });
        }
        let mut next = self.clone();
        let mut renames: BTreeMap<String, String> = BTreeMap::new();
        let ids: Vec<&String> = other.mentions.keys().chain(other.relations.keys()).collect();
        for id in ids {
            let fresh = if next.contains_id(id) || renames.values().any(|v| v == id) {
                next.fresh_id(id, &renames)
            } else {
                id.clone()
            };
            renames.insert(id.clone(), fresh);
        }
        let rename = |a: &AnchorRef| match a {
            AnchorRef::Token(i) => AnchorRef::Token(*i),
            AnchorRef::Mention(id) => AnchorRef::Mention(renames[id].clone()),
            AnchorRef::Relation(id) => AnchorRef::Relation(renames[id].clone()),
        };
        for m in other.mentions.values() {
            let mut m = m.clone();
            m.id = renames[&m.id].clone();
            next.mentions.insert(m.id.clone(), m);
        }
        for r in other.relations.values() {
            let mut r = r.clone();
            r.id = renames[&r.id].clone();
            r.trigger = r.trigger.as_ref().map(rename);
            for arg in &mut r.arguments {
                arg.target = rename(&arg.target);
            }
            next.relations.insert(r.id.clone(), r);
        }
        for (mine, theirs) in next.tokens.iter_mut().zip(&other.tokens) {
            if mine.columns.is_none() && mine.span == theirs.span {
                mine.columns = theirs.columns.clone();
            }
        }
        Ok(next)
    }

    /// First unused id sharing the alphabetic prefix of `like`.
    pub fn fresh_id(&self, like: &str, reserved: &BTreeMap<String, String>) -> String {
        let prefix: String = like.chars().take_while(|c| c.is_alphabetic()).collect();
        let prefix = if prefix.is_empty() { "X".to_string() } else { prefix };
        (1..)
            .map(|n| format!("{prefix}{n}"))
            .find(|c| !self.contains_id(c) && !reserved.values().any(|v| v == c))
            .expect("unbounded id space")
    }

    pub(crate) fn check_anchors(&self, mention: &Mention) -> Result<(), GraphError> {
        let len = self.char_len();
        let bad = |reason: String| GraphError::InvalidAnchor { id: mention.id.clone(), reason };
        if mention.anchors.is_empty() {
            return Err(bad("no anchors".into()));
        }
        for (i, span) in mention.anchors.iter().enumerate() {
            if span.start > span.end || span.end > len {
                return Err(bad(format!("span {span} outside text of length {len}")));
            }
            if i > 0 && mention.anchors[i - 1].end > span.start {
                return Err(bad("anchors not sorted and disjoint".into()));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_shape(rel: &Relation) -> Result<(), GraphError> {
    if rel.arguments.is_empty() {
        return Err(GraphError::InvalidRelation { id: rel.id.clone(), reason: "no arguments".into() });
    }
    if rel.trigger.is_none() && rel.arguments.len() < 2 {
        return Err(GraphError::InvalidRelation {
            id: rel.id.clone(),
            reason: "trigger-free relations need at least two arguments".into(),
        });
    }
    Ok(())
}
