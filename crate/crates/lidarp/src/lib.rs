pub mod event_form;
pub mod harness;
pub mod instance;
pub mod location_form;
pub mod milp;
pub mod route;
pub mod subline_form;
pub mod timewin;
