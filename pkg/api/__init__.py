from api.plans import plans_router
from api.simulate import simulate_router
from api.sweeps import sweeps_router
from api.pages import pages_router

__all__ = ["plans_router", "simulate_router", "sweeps_router", "pages_router"]
