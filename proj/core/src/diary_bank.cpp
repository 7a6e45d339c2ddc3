// Synthetic diary phrase banks. Bands share theme vocabulary so text
// retrieval has signal, while individual phrases stay distinct.
#include <vector>

#include "pulse/error.hpp"
#include "pulse/synth.hpp"

namespace pulse {

namespace {

const std::vector<std::string> kBand0 = {
    "Slept deeply and woke up before the alarm feeling rested.",
    "A calm morning with coffee on the porch and no rush at all.",
    "Went for a long walk by the river and felt light the whole way.",
    "Lunch with my sister was easy and full of laughing.",
    "Finished the garden beds and sat admiring them for a while.",
    "Energy stayed steady all day and the evening felt peaceful.",
    "Cooked a slow dinner and enjoyed every step of it.",
    "The checkup went smoothly and the nurse was kind as always.",
    "Read in the sun for an hour and lost track of time pleasantly.",
    "Grandkids visited and the house felt warm and loud in a good way.",
    "A quiet day of small chores that all went right.",
    "Felt strong on the bike ride and the weather was perfect.",
    "Caught up with an old friend and we talked for hours.",
    "Everything on the list got done early and I just relaxed.",
    "Music on while painting the fence made the afternoon fly by.",
    "Felt settled and easy about the week ahead.",
    "The swim felt effortless and I stayed longer than planned.",
    "Good news from the clinic and a light heart all evening.",
    "Made bread from scratch and shared it with the neighbors.",
    "A nap in the hammock and then a gentle stroll at dusk.",
    "Body felt cooperative today and the stretches were easy.",
    "Laughed a lot at the book club and came home smiling.",
    "Steady, simple day with a warm dinner and an early night.",
    "The volunteering shift left me feeling useful and connected.",
    "Sunlight in the kitchen all morning and nothing to worry over.",
    "Walked the dog twice and both times felt like a treat.",
    "The garden tomatoes finally ripened and it felt like a small win.",
    "Planned the trip with ease and everyone agreed quickly.",
    "A soak in the tub and tea after made the evening perfect.",
    "Felt thankful for the quiet and slept with the window open.",
    "The morning stretch class left me loose and cheerful all day.",
    "Phone stayed in a drawer most of the day and I did not miss it.",
    "Wrote letters in the afternoon and felt unhurried.",
    "The appointment was quick and the drive home was pretty.",
    "Shared a long breakfast and nobody looked at the clock.",
    "A gentle day, tidy house, and a film in the evening.",
    "Energy for the stairs without a second thought today.",
    "Picked apples with the neighbors and we split the baskets.",
    "Everything felt manageable and the evening came slowly.",
    "Fell asleep grateful for an ordinary, kind day.",
};

const std::vector<std::string> kBand1 = {
    "An ordinary day, a little slow after lunch but fine overall.",
    "Work emails piled up but I got through the important ones.",
    "Slept okay though I woke once and took a while to drift back.",
    "A mild headache in the morning that faded by noon.",
    "The errands took longer than planned but got done.",
    "Felt a bit flat in the afternoon and better after a walk.",
    "Small disagreement about the schedule, smoothed over by dinner.",
    "The waiting room was slow and I was glad to be out.",
    "A gray day; stayed in mostly and kept busy with laundry.",
    "Energy was fine in the morning and dipped by evening.",
    "Missed the bus and was late, but the meeting went alright.",
    "Dinner was quiet; we were both tired from the week.",
    "The knee complained on the stairs but settled down later.",
    "Got some of the list done and left the rest for tomorrow.",
    "A little restless before bed, scrolled longer than I meant to.",
    "The call with the clinic was fine, just routine scheduling.",
    "Helped with the move for an hour and my back noticed it.",
    "Mostly steady day with a short stretch of feeling foggy.",
    "Spilled coffee on the notes and had to redo a page.",
    "The traffic made me later than I like but nothing came of it.",
    "Lunch was rushed; the afternoon evened out.",
    "A slightly short fuse today, nothing serious.",
    "Did the exercises but with less enthusiasm than usual.",
    "The neighbor's project was loud most of the afternoon.",
    "Okay day; the evening show helped me unwind.",
    "Some mild soreness after the yard work, manageable.",
    "Forgot an ingredient and dinner was improvised, it worked.",
    "Slow start, decent middle, tired but fine by night.",
    "The forms took an hour that I resented a little.",
    "Kept postponing the walk and only managed a short loop.",
    "A bit of worry about the bill, probably nothing.",
    "The nap helped but left me groggy for a while.",
    "Plans shifted twice and I just went along with it.",
    "Average sleep, average mood, a level sort of day.",
    "The store was crowded and I kept the visit short.",
    "Got the report sent but stared at the screen too long.",
    "Felt a little left out of the group chat plans.",
    "Weather kept us in; cards at the table in the evening.",
    "The reminder about the follow-up sat in my head a bit.",
    "Nothing wrong exactly, just not a shiny day.",
};

const std::vector<std::string> kBand2 = {
    "Woke tired and dragged through most of the morning.",
    "The scan date is coming up and it keeps intruding on things.",
    "Snapped at the kids over nothing and felt bad about it after.",
    "Stress headache much of the afternoon despite the pills.",
    "Too many deadlines landed in the same week and it shows.",
    "Slept badly, kept rehearsing tomorrow's conversation.",
    "The fatigue was heavy today and naps did not touch it.",
    "Worried about the test results more than I admitted aloud.",
    "The argument from last night was still in the air all day.",
    "Appetite was off and I mostly picked at meals.",
    "Felt wound up all day and could not settle into anything.",
    "The commute drained me before the day even started.",
    "Cancelled the walk again; couldn't find the push.",
    "My chest felt tight during the meeting and I stepped out.",
    "The bills spread on the table made my stomach knot.",
    "Kept checking my phone without knowing what I was looking for.",
    "The soreness flared and stairs were a negotiation.",
    "Felt stretched thin between work and the appointments.",
    "A low hum of dread I could not source all afternoon.",
    "The news from my cousin unsettled the whole evening.",
    "Everything took twice the effort it should have.",
    "Short sleep, long day, and patience ran out by dinner.",
    "The waiting is the worst part and today was all waiting.",
    "Couldn't focus on the book; read the same page three times.",
    "The house felt loud and I wanted to be elsewhere.",
    "Skipped the class; the energy just was not there.",
    "A tense call with the insurance people left me rattled.",
    "Tired eyes, tight shoulders, a day to get through.",
    "The forecast ruined the one plan I was looking forward to.",
    "Kept the lights on late because sleep felt far away.",
    "The mirror conversation about the treatment got heavy.",
    "Irritable at small sounds, which is never a good sign.",
    "Work piled on and the evening was just recovery.",
    "The ache came back in the afternoon and sat there.",
    "Too restless to nap, too tired to do anything useful.",
    "The reminder letter brought the whole thing rushing back.",
    "Ate standing up between tasks, not a proud day.",
    "Felt alone with it even in a full room.",
    "Put on a brave face at dinner and dropped it after.",
    "Hoping tomorrow runs quieter than today did.",
};

const std::vector<std::string> kBand3 = {
    "Barely slept; the dark thoughts ran loops until dawn.",
    "The pain flared so badly I cancelled everything.",
    "Cried in the car before going inside, twice.",
    "The fear about the recurrence swallowed the whole day.",
    "Could not get out of bed until almost noon.",
    "Everything felt pointless and heavy from the first hour.",
    "The nausea after treatment wiped the day off the calendar.",
    "Panic rose in the waiting room and I nearly walked out.",
    "Shaking by the time the phone call finally ended.",
    "The loneliness tonight has real weight to it.",
    "Hid in the bathroom to breathe during the gathering.",
    "The results talk went badly and the floor tilted.",
    "Anger burst out over a dropped plate; it wasn't about the plate.",
    "Exhausted beyond naps, beyond coffee, beyond caring.",
    "The body aches everywhere and the mind matches it.",
    "Said I was fine so many times the word lost meaning.",
    "Dread sat on my chest like a stone all afternoon.",
    "Couldn't eat; pushed the same fork around for an hour.",
    "The night terrors are back and so is the dread of bed.",
    "Screamed into a pillow after the insurance denial.",
    "Every small task felt like lifting something enormous.",
    "The scan was today and I fell apart in the parking lot.",
    "Nobody called and I could not make myself call anyone.",
    "The ache in my bones made even sitting a chore.",
    "Hopeless is a strong word and today earned it.",
    "Wept through the shower where no one could hear.",
    "The argument ended with doors and silence for hours.",
    "Terrified of the follow-up and ashamed of being terrified.",
    "The fatigue is total; even speaking felt expensive.",
    "Stared at the ceiling most of the night, heart pounding.",
    "The house is full and I have never felt so alone in it.",
    "Another wave of grief arrived without warning at lunch.",
    "Flinched at the phone all day expecting bad news.",
    "The treatment side effects stole another entire day.",
    "Everything hurts and the patience for it is gone.",
    "Cancelled on friends again and hated myself for it.",
    "The darkness pressed in hard once the sun went down.",
    "Begged the clock to move faster and it would not.",
    "No appetite, no energy, no shape to the hours.",
    "Today was about surviving until tomorrow, nothing more.",
};

}  // namespace

const std::vector<std::string>& diary_phrase_bank(int band) {
  switch (band) {
    case 0: return kBand0;
    case 1: return kBand1;
    case 2: return kBand2;
    case 3: return kBand3;
    default: raise(ErrorCode::invalid_argument, "diary band must be in [0, 3]");
  }
}

}  // namespace pulse
