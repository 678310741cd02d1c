"""
Command handlers.
"""
from pace.handlers.data import router as data_router
from pace.handlers.evaluation import router as evaluation_router
from pace.handlers.inference import router as inference_router
from pace.handlers.router import Command, Router, arg
from pace.handlers.training import router as training_router

routers = [data_router, training_router, inference_router, evaluation_router]

__all__ = ["Command", "Router", "arg", "routers"]
