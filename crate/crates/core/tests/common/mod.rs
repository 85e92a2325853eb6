pub mod lti;
pub mod rc;
