use crate::attribute::AttributeCatalog;
use crate::network::CausalLink;

pub fn catalog() -> AttributeCatalog {
    AttributeCatalog::final_study()
}

pub fn link(cause: &str, effect: &str) -> CausalLink {
    catalog().link(cause, effect).unwrap()
}
