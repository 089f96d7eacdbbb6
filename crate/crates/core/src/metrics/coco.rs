//! The 80 MSCOCO object categories and a compact synonym table.

pub const COCO_CATEGORIES: [&str; 80] = [
    "person",
    "bicycle",
    "car",
    "motorcycle",
    "airplane",
    "bus",
    "train",
    "truck",
    "boat",
    "traffic light",
    "fire hydrant",
    "stop sign",
    "parking meter",
    "bench",
    "bird",
    "cat",
    "dog",
    "horse",
    "sheep",
    "cow",
    "elephant",
    "bear",
    "zebra",
    "giraffe",
    "backpack",
    "umbrella",
    "handbag",
    "tie",
    "suitcase",
    "frisbee",
    "skis",
    "snowboard",
    "sports ball",
    "kite",
    "baseball bat",
    "baseball glove",
    "skateboard",
    "surfboard",
    "tennis racket",
    "bottle",
    "wine glass",
    "cup",
    "fork",
    "knife",
    "spoon",
    "bowl",
    "banana",
    "apple",
    "sandwich",
    "orange",
    "broccoli",
    "carrot",
    "hot dog",
    "pizza",
    "donut",
    "cake",
    "chair",
    "couch",
    "potted plant",
    "bed",
    "dining table",
    "toilet",
    "tv",
    "laptop",
    "mouse",
    "remote",
    "keyboard",
    "cell phone",
    "microwave",
    "oven",
    "toaster",
    "sink",
    "refrigerator",
    "book",
    "clock",
    "vase",
    "scissors",
    "teddy bear",
    "hair drier",
    "toothbrush",
];

/// `(surface form, canonical category)`.
pub const COCO_SYNONYMS: &[(&str, &str)] = &[
    ("people", "person"),
    ("man", "person"),
    ("men", "person"),
    ("woman", "person"),
    ("women", "person"),
    ("boy", "person"),
    ("girl", "person"),
    ("child", "person"),
    ("children", "person"),
    ("kid", "person"),
    ("guy", "person"),
    ("lady", "person"),
    ("ladies", "person"),
    ("player", "person"),
    ("skier", "person"),
    ("surfer", "person"),
    ("bike", "bicycle"),
    ("cycle", "bicycle"),
    ("automobile", "car"),
    ("taxi", "car"),
    ("sedan", "car"),
    ("motorbike", "motorcycle"),
    ("motor bike", "motorcycle"),
    ("scooter", "motorcycle"),
    ("plane", "airplane"),
    ("jet", "airplane"),
    ("aircraft", "airplane"),
    ("airliner", "airplane"),
    ("locomotive", "train"),
    ("tram", "train"),
    ("pickup", "truck"),
    ("lorry", "truck"),
    ("ship", "boat"),
    ("sailboat", "boat"),
    ("kayak", "boat"),
    ("canoe", "boat"),
    ("yacht", "boat"),
    ("stoplight", "traffic light"),
    ("traffic signal", "traffic light"),
    ("hydrant", "fire hydrant"),
    ("meter", "parking meter"),
    ("pigeon", "bird"),
    ("seagull", "bird"),
    ("duck", "bird"),
    ("parrot", "bird"),
    ("kitten", "cat"),
    ("kitty", "cat"),
    ("puppy", "dog"),
    ("puppies", "dog"),
    ("pup", "dog"),
    ("pony", "horse"),
    ("foal", "horse"),
    ("lamb", "sheep"),
    ("cattle", "cow"),
    ("bull", "cow"),
    ("calf", "cow"),
    ("back pack", "backpack"),
    ("knapsack", "backpack"),
    ("parasol", "umbrella"),
    ("purse", "handbag"),
    ("hand bag", "handbag"),
    ("necktie", "tie"),
    ("luggage", "suitcase"),
    ("suit case", "suitcase"),
    ("ski", "skis"),
    ("ball", "sports ball"),
    ("soccer ball", "sports ball"),
    ("football", "sports ball"),
    ("basketball", "sports ball"),
    ("tennis ball", "sports ball"),
    ("bat", "baseball bat"),
    ("glove", "baseball glove"),
    ("mitt", "baseball glove"),
    ("skate board", "skateboard"),
    ("surf board", "surfboard"),
    ("racket", "tennis racket"),
    ("racquet", "tennis racket"),
    ("mug", "cup"),
    ("knives", "knife"),
    ("burger", "sandwich"),
    ("hotdog", "hot dog"),
    ("doughnut", "donut"),
    ("cupcake", "cake"),
    ("stool", "chair"),
    ("sofa", "couch"),
    ("plant", "potted plant"),
    ("houseplant", "potted plant"),
    ("table", "dining table"),
    ("desk", "dining table"),
    ("television", "tv"),
    ("computer", "laptop"),
    ("notebook", "laptop"),
    ("remote control", "remote"),
    ("controller", "remote"),
    ("phone", "cell phone"),
    ("cellphone", "cell phone"),
    ("smartphone", "cell phone"),
    ("stove", "oven"),
    ("fridge", "refrigerator"),
    ("novel", "book"),
    ("teddybear", "teddy bear"),
    ("stuffed animal", "teddy bear"),
    ("hairdryer", "hair drier"),
    ("hair dryer", "hair drier"),
    ("blow dryer", "hair drier"),
    ("tooth brush", "toothbrush"),
];
