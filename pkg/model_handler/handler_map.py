from model_handler.bootstrap_handler import BootstrapHandler
from model_handler.erm_handler import ErmHandler
from model_handler.gee_handler import GeeHandler
from model_handler.mvp_handler import MvpHandler
from model_handler.naive_handler import NaiveHandler
from model_handler.penalized_handler import PenalizedHandler

handler_map = {
    "naive": NaiveHandler,
    "penalized": PenalizedHandler,
    "mvp": MvpHandler,
    "gee": GeeHandler,
    "bootstrap": BootstrapHandler,
    "erm": ErmHandler,
}
