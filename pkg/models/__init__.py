from .imageModel import RgbImage, GrayImage, BinaryImage, LabelImage, BBox
from .filterModel import GaborFilter, Filterbank
from .fieldModel import AnalyticImage, ChannelField, AmFmField
from .detectionModel import Kind, Direction, PatchCounts, Votes, Detection, Abstention, FrameReport
from .knnModel import KnnModel
from .configModel import PipelineConfig, load_config
